#ifndef PHASEDECODER_FFT_HPP
#define PHASEDECODER_FFT_HPP

#include "phasedecoder/field.hpp"

namespace dpd {

// Unitary 2-D DFT pair: both directions carry 1/sqrt(width*height), so the
// inverse is exactly the adjoint. DC stays at index [0,0].
//
// Plans are cached per grid shape and created lazily under a lock; execution
// is reentrant, so transforms may run concurrently on distinct buffers.
// Buffers must come from the aligned containers in field.hpp.
void unitary_dft_2d(int height, int width, const Complex* in, Complex* out, bool inverse);

ComplexField fft2_unitary(const ComplexField& field);
ComplexField ifft2_unitary(const ComplexField& field);

}  // namespace dpd

#endif
