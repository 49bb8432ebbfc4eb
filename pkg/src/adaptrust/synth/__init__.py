"""Synthetic data with ground truth, and file storage."""
from .generator import GeneratorConfig, GroundTruth, generate_dataset
from .storage import DatasetPaths, load_dataset, load_model_pair, save_dataset, save_model_pair
