// Thread-count control for the OpenMP kernels.
#pragma once

namespace fgwas {

// Threads OpenMP will use (1 when built without OpenMP).
int max_threads();

// n >= 1 pins the count; n <= 0 restores the hardware default.
void set_threads(int n);

}  // namespace fgwas
