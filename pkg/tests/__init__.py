# xiangqi-zero test suite
