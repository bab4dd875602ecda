#include "pml/pml.hpp"
int main(){return 0;}
