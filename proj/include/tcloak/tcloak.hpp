#pragma once

#include "tcloak/errors.hpp"
#include "tcloak/vec.hpp"
#include "tcloak/profile.hpp"
#include "tcloak/symbol.hpp"
#include "tcloak/metric.hpp"
#include "tcloak/field.hpp"
#include "tcloak/signal.hpp"
#include "tcloak/wavesolver.hpp"
#include "tcloak/transformed.hpp"
#include "tcloak/config.hpp"
#include "tcloak/experiment.hpp"
#include "tcloak/io.hpp"
