#pragma once

#include "sigra/ormac.hpp"
#include "sigra/signature_codec.hpp"
#include "sigra/codebook.hpp"
#include "sigra/dimensioning.hpp"
#include "sigra/decoder.hpp"
#include "sigra/arp_sim.hpp"
#include "sigra/experiment.hpp"
