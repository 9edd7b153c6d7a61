"""Link-level BER simulation of M-PSK and M-QAM over Rician fading with MRC diversity."""

__version__ = "0.1.0"
