# Persistence modules
from xiangqi_zero.database.checkpoint import load_checkpoint, save_checkpoint
from xiangqi_zero.database.example_store import ReplayBuffer, read_examples, read_manifest, write_examples
from xiangqi_zero.database.files import write_bytes, write_text

__all__ = [
    "ReplayBuffer",
    "load_checkpoint",
    "read_examples",
    "read_manifest",
    "save_checkpoint",
    "write_bytes",
    "write_examples",
    "write_text",
]
