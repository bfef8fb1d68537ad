#ifndef PHASEDECODER_FORWARD_HPP
#define PHASEDECODER_FORWARD_HPP

#include "phasedecoder/field.hpp"
#include "phasedecoder/zernike.hpp"

namespace dpd {

/// One pupil per capture. The measurement operator for capture n is
/// amplitude = |ifft(P_n * fft(object))| with unitary transforms throughout,
/// so the model is cyclic and a unit-modulus pupil only removes energy.
struct MeasurementModel {
  PupilGeometry geometry;
  std::vector<Pupil> pupils;

  void validate() const;  // N >= 1, shared geometry
};

/// o = exp(j*phase), a pure phase object of unit modulus.
ComplexField transmission(const RealImage& phase);

RealImage propagate_amplitude(const ComplexField& object, const Pupil& pupil);

FocusStack forward_stack(const RealImage& phase, const MeasurementModel& model);

}  // namespace dpd

#endif
