# xiangqi-zero - Self-play Xiangqi engine
# Version: 0.1.0

__version__ = "0.1.0"
