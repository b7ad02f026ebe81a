from .cli import CommandLineUI

__all__ = ['CommandLineUI']
