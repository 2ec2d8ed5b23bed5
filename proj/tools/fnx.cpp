// SPDX-License-Identifier: Apache-2.0
#include <cstdio>

int main() {
    std::puts("fnx: CLI wiring pending");
    return 0;
}
