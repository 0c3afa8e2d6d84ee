#pragma once

#include "priorforge/config.hpp"
#include "priorforge/networks.hpp"

namespace pf {

// The networks a configuration calls for. code_generator is absent for the
// Gaussian-prior baseline; image_discriminator is absent when neither the
// prior-improvement phase nor the perceptual loss needs it; the Q head
// exists only in conditional modes.
struct ModelSet {
  std::unique_ptr<Encoder> encoder;
  std::unique_ptr<Decoder> decoder;
  std::unique_ptr<CodeGenerator> code_generator;
  std::unique_ptr<ImageDiscriminator> image_discriminator;
  std::unique_ptr<CodeDiscriminator> code_discriminator;

  std::vector<Network*> networks() const {
    std::vector<Network*> out;
    for (Network* n : std::initializer_list<Network*>{encoder.get(), decoder.get(),
                                                      code_generator.get(),
                                                      image_discriminator.get(),
                                                      code_discriminator.get()})
      if (n) out.push_back(n);
    return out;
  }
  void set_train(bool t) const {
    for (Network* n : networks()) n->set_train(t);
  }
};

// Deterministic given the rng state; construction order is fixed.
ModelSet build_models(const TrainingConfig& cfg, Rng& rng);

}  // namespace pf
