#include "phasedecoder/forward.hpp"

#include <cmath>
#include <stdexcept>

#include "phasedecoder/fft.hpp"

namespace dpd {

void MeasurementModel::validate() const {
  if (pupils.empty()) throw std::invalid_argument("MeasurementModel: needs at least one pupil");
  for (const Pupil& p : pupils) {
    if (!(p.geometry.grid == geometry.grid) || p.geometry.na != geometry.na) {
      throw std::invalid_argument("MeasurementModel: pupils must share geometry");
    }
  }
}

ComplexField transmission(const RealImage& phase) {
  ComplexField object(phase.grid);
  for (std::size_t i = 0; i < phase.values.size(); ++i) {
    object.values[i] = std::polar(1.0, phase.values[i]);
  }
  return object;
}

RealImage propagate_amplitude(const ComplexField& object, const Pupil& pupil) {
  if (!(object.grid == pupil.geometry.grid)) {
    throw std::invalid_argument("propagate_amplitude: object and pupil grids differ");
  }
  ComplexField spectrum = fft2_unitary(object);
  for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
    spectrum.values[i] *= pupil.values[i];
  }
  ComplexField field = ifft2_unitary(spectrum);
  RealImage amplitude(object.grid);
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    amplitude.values[i] = std::abs(field.values[i]);
  }
  return amplitude;
}

FocusStack forward_stack(const RealImage& phase, const MeasurementModel& model) {
  if (!(phase.grid == model.geometry.grid)) {
    throw std::invalid_argument("forward_stack: phase and model grids differ");
  }
  const ComplexField object = transmission(phase);
  const ComplexField spectrum = fft2_unitary(object);

  FocusStack stack;
  stack.grid = phase.grid;
  stack.amplitudes.resize(model.pupils.size(), RealImage(phase.grid));

  // Per-pupil propagations are independent; each writes only its own image.
#pragma omp parallel for schedule(static)
  for (long n = 0; n < static_cast<long>(model.pupils.size()); ++n) {
    ComplexField filtered(phase.grid);
    for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
      filtered.values[i] = spectrum.values[i] * model.pupils[n].values[i];
    }
    ComplexField field = ifft2_unitary(filtered);
    RealImage& amplitude = stack.amplitudes[n];
    for (std::size_t i = 0; i < field.values.size(); ++i) {
      amplitude.values[i] = std::abs(field.values[i]);
    }
  }
  return stack;
}

}  // namespace dpd
