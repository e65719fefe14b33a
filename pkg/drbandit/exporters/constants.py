# drbandit/exporters/constants.py

RESULT_COLUMNS = [
    "sweep_param",
    "policy",
    "checkpoint",
    "mean",
    "min",
    "max",
    "stderr",
    "seed",
]
RESULT_FILENAME_TEMPLATE = "results_{}.{}"
METADATA_FILENAME_TEMPLATE = "experiment_{}.json"
SVG_TITLE = "Regret"
