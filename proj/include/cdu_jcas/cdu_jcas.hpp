// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header for the signal-processing library (no harness).

#ifndef CDU_JCAS_CDU_JCAS_HPP
#define CDU_JCAS_CDU_JCAS_HPP

#include "array.hpp"
#include "core.hpp"
#include "modem.hpp"
#include "range_doppler.hpp"
#include "rng.hpp"
#include "scene_channel.hpp"
#include "sic_receiver.hpp"

#endif
