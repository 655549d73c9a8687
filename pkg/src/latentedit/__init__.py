"""latentedit: two-branch latent-space image editing at desk scale."""

__version__ = "0.1.0"
