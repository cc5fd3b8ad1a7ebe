"""Token-level molecular GAN over byte-pair-encoded SMILES, in numpy."""

__version__ = "0.1.0"
