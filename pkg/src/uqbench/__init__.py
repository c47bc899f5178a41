"""uqbench: uncertainty quantification for classifiers, with an evaluation
harness covering misclassification separation, rater-agreement correlation,
unknown-class and domain OOD detection, and SNR corruption sweeps."""

__version__ = "0.1.0"
