// Regenerate the committed codec golden vectors. Usage:
//   gen-epc-vectors > vectors/epc_vectors.txt

#include <cstdio>

#include "gtwin/vectors.hpp"

int main() {
    std::fputs(gtwin::render_vector_file().c_str(), stdout);
    return 0;
}
