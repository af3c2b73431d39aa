#pragma once

namespace derain::core {

// Thread-count control for the OpenMP kernels. All kernels produce results
// that are bit-identical to the serial reference regardless of this value:
// parallelism is always across independent output elements, never across a
// single floating-point reduction.
int thread_count();
void set_thread_count(int n);

}  // namespace derain::core
