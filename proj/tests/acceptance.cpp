// Apache License, Version 2.0, refer to LICENSE.txt

#include "hdphom/verify.hpp"
int main() { return 0; }
