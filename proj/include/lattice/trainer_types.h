// lattice/trainer_types.h
//
// Copyright 2026 The lattice-lid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LATTICE_TRAINER_TYPES_H_
#define LATTICE_TRAINER_TYPES_H_

#include <cstdint>
#include <stdexcept>

namespace lattice {

struct TrainConfig {
  int epochs = 40;
  int warmup_steps = 500;
  double lr_scale = 1.0;
  int batch_size = 16;
  uint64_t seed = 1;
  int keep_checkpoints = 40;
  int average_top_k = 10;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  double val_fraction = 0.1;
  double grad_clip = 0.0;  // max global norm; 0 disables

  void validate() const {
    if (warmup_steps < 1) throw std::invalid_argument("warmup_steps < 1");
    if (epochs < 1) throw std::invalid_argument("epochs < 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size < 1");
    if (average_top_k < 1 || average_top_k > keep_checkpoints)
      throw std::invalid_argument("average_top_k must be in [1, keep_checkpoints]");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
      throw std::invalid_argument("val_fraction out of range");
  }
};

}  // namespace lattice

#endif  // LATTICE_TRAINER_TYPES_H_
