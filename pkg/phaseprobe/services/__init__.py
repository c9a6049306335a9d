"""
Services for the phaseprobe command line
"""
from phaseprobe.services.config_service import ConfigService, RunConfig, default_threads

__all__ = ["ConfigService", "RunConfig", "default_threads"]
