#ifndef SEIARD_SEIARD_HPP
#define SEIARD_SEIARD_HPP

#include "seiard/config.hpp"
#include "seiard/dynamics.hpp"
#include "seiard/errors.hpp"
#include "seiard/io.hpp"
#include "seiard/loss.hpp"
#include "seiard/mcmc.hpp"
#include "seiard/optimize.hpp"
#include "seiard/params.hpp"
#include "seiard/pipeline.hpp"
#include "seiard/posterior.hpp"
#include "seiard/profile.hpp"
#include "seiard/random.hpp"
#include "seiard/structural.hpp"
#include "seiard/synthdata.hpp"
#include "seiard/truncated_normal.hpp"

#endif  // SEIARD_SEIARD_HPP
