"""distilkit: desk-scale knowledge distillation for BERT-style encoders."""

__version__ = "0.1.0"
