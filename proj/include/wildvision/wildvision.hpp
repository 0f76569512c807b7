#pragma once

#include "wildvision/error.hpp"
#include "wildvision/core.hpp"
#include "wildvision/image.hpp"
#include "wildvision/sampler.hpp"
#include "wildvision/detectors.hpp"
#include "wildvision/consensus.hpp"
#include "wildvision/metrics.hpp"
#include "wildvision/complexity.hpp"
