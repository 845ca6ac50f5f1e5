import os
import logging

LOG_FORMAT = "%(levelname) -10s %(asctime) " "-30s: %(message)s"
LOG_LEVEL = os.environ.get("ANHOLO_LOG_LEVEL", "INFO").upper()
LOGGER = logging.getLogger("anholo")
logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
