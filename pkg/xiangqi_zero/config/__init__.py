# Configuration module
from xiangqi_zero.config.settings import Settings, build_settings, load_config_file, normalize_key

__all__ = ["Settings", "build_settings", "load_config_file", "normalize_key"]
