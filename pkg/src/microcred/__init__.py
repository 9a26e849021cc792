"""Consortium-ledger platform for micro-credential certification,
token wallets, third-party verification and course exemptions."""

__version__ = "0.1.0"
