#pragma once

// Multistatic SAR crosstalk simulation, artifact prediction and mitigation.

#include "xtalk/config.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/forward_model.hpp"
#include "xtalk/geometry.hpp"
#include "xtalk/imaging.hpp"
#include "xtalk/io.hpp"
#include "xtalk/mitigation.hpp"
#include "xtalk/pipeline.hpp"
#include "xtalk/scene.hpp"
#include "xtalk/vec3.hpp"
