#pragma once

#include "palmtpl/config.hpp"
#include "palmtpl/error.hpp"
#include "palmtpl/evalharness.hpp"
#include "palmtpl/imaging.hpp"
#include "palmtpl/keypoints.hpp"
#include "palmtpl/matching.hpp"
#include "palmtpl/orientation.hpp"
#include "palmtpl/pipeline.hpp"
#include "palmtpl/rng.hpp"
#include "palmtpl/template.hpp"
