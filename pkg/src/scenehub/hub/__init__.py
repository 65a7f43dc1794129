from .config import HubConfig, load_hub_config
from .core import Hub, RejectedMessage, load_event_log
from .headless import run_headless

__all__ = ["Hub", "HubConfig", "RejectedMessage", "load_event_log", "load_hub_config", "run_headless"]
