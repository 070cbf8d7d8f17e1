EXIT_SUCCESS = 0
EXIT_STAGE_FAILURE = 1
EXIT_USAGE_ERROR = 2

STAGE_SUCCESS = "SUCCESS"
STAGE_FAILURE = "FAILURE"
STAGE_SKIPPED = "SKIPPED"
