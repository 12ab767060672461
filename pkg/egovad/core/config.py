"""
Configuration settings for the egovad toolkit
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load .env file from repository root
repo_dir = Path(__file__).parent.parent.parent
env_path = repo_dir / ".env"
load_dotenv(env_path)


class Settings:
    """Toolkit settings"""

    # Ambient settings (never change artifact bytes)
    LOG_LEVEL: str = os.getenv("EGOVAD_LOG_LEVEL", "INFO").upper()
    LOADER_WORKERS: int = int(os.getenv("EGOVAD_LOADER_WORKERS", "4"))
    TORCH_THREADS: int = int(os.getenv("EGOVAD_TORCH_THREADS", "1"))

    # Feature pooling
    SNIPPET_LEN: int = 16

    # Top-k MIL
    TOP_K: int = 3
    MARGIN: float = 100.0
    ALPHA_MAG: float = 1e-4
    BETA_SMOOTH: float = 8e-4
    GAMMA_SPARSE: float = 8e-4
    PROB_CLAMP: float = 1e-7

    # Optimizer
    LEARNING_RATE: float = 1e-3
    MOMENTUM: float = 0.9
    EPOCHS: int = 50

    # Detector
    DILATIONS: tuple = (1, 2, 4)
    KERNEL_SIZE: int = 3
    SCORER_HIDDEN: tuple = (512, 32)

    # Synthetic data
    MAGNITUDE_BOOST: float = 3.0
    NOISE_SIGMA: float = 0.05
    TRAIN_FRACTION: float = 0.7

    @classmethod
    def validate(cls):
        """Validate ambient settings"""
        if cls.LOG_LEVEL not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(
                f"EGOVAD_LOG_LEVEL must be a logging level name, got {cls.LOG_LEVEL!r}"
            )
        if cls.LOADER_WORKERS < 1:
            raise ValueError("EGOVAD_LOADER_WORKERS must be >= 1")
        if cls.TORCH_THREADS < 1:
            raise ValueError("EGOVAD_TORCH_THREADS must be >= 1")


settings = Settings()
