"""Detection of suspicious hidden sensitive operations (likely logic bombs)
in TIR programs: taint-based trigger discovery plus one-class SVM scoring."""

__version__ = "0.1.0"
