"""Channel pairs that every detected entangled state discriminates better
than any separable probe, with numerical certificates for the identities
behind them."""

__version__ = "0.1.0"
