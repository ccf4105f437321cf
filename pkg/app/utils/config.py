import os
from dotenv import load_dotenv

# Load environment variables from .env file if it exists
load_dotenv()


class Config:
    """
    Configuration class for the EBTH verification toolkit.
    Loads settings from environment variables with sensible defaults.
    """

    # --- Project ---
    PROJECT_NAME: str = "ebth-sato"
    VERSION: str = "1.0.0"
    REPORT_SCHEMA: int = 1
    DEBUG: bool = os.getenv("EBTH_DEBUG", "False").lower() == "true"

    # --- Parallelism ---
    # joblib worker cap for independent checks
    THREADS: int = max(1, int(os.getenv("EBTH_THREADS", "1")))

    # --- Sampling ---
    # bounded redraws when a sampled w~_0 value would vanish
    MAX_REDRAWS: int = int(os.getenv("EBTH_MAX_REDRAWS", "8"))
    # numerators/denominators of random rationals are drawn from [-SAMPLE_BOUND, SAMPLE_BOUND]
    SAMPLE_BOUND: int = int(os.getenv("EBTH_SAMPLE_BOUND", "5"))

    # --- Defaults for a run ---
    DEFAULT_EPSILON: str = os.getenv("EBTH_EPSILON", "1")
    DEFAULT_LATTICE: str = os.getenv("EBTH_LATTICE", "-30..30")
    DEFAULT_WINDOW: str = os.getenv("EBTH_WINDOW", "-6..6")

    # --- Logging Settings ---
    LOG_LEVEL: str = os.getenv("EBTH_LOG_LEVEL", "INFO").upper()
    LOG_FORMAT: str = os.getenv("EBTH_LOG_FORMAT", "console")  # or "json"


# Instantiate the config
settings = Config()
