#pragma once

namespace sinevid {

// Every gradient step allocates and frees a few MB of tape buffers. With the
// default glibc thresholds those blocks go back to the kernel on free and
// are faulted in again on the next step, which costs about a third of the
// step time. Raises the mmap and trim thresholds so freed blocks stay in
// the heap. Process-wide; no effect on other C libraries.
void keep_freed_memory() noexcept;

} // namespace sinevid
