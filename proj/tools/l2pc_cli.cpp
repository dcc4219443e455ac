#include <cstdio>
int main() { std::printf("l2pc cli placeholder\n"); return 0; }
