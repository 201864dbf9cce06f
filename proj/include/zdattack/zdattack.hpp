#pragma once

#include "zdattack/errors.hpp"
#include "zdattack/types.hpp"
#include "zdattack/linalg.hpp"
#include "zdattack/lti.hpp"
#include "zdattack/sampling.hpp"
#include "zdattack/analysis.hpp"
#include "zdattack/attacks.hpp"
#include "zdattack/sdp.hpp"
#include "zdattack/defense.hpp"
#include "zdattack/sim.hpp"
