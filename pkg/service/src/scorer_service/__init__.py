"""Reference sentence-pair scoring service behind the /score wire protocol."""

from .app import ServiceConfig, create_app, serve
from .finetune import Hyperparameters, finetune, load_pair_corpus, pair_accuracy
from .model import PairClassifier, load_model, save_model, token_ids

__version__ = "0.1.0"
