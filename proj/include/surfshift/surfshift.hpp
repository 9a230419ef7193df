// Umbrella header.
#ifndef SURFSHIFT_SURFSHIFT_HPP
#define SURFSHIFT_SURFSHIFT_HPP

#include "graph.hpp"
#include "pwl.hpp"
#include "potential.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "addition.hpp"
#include "sampler.hpp"
#include "tau.hpp"
#include "campaign.hpp"
#include "experiments.hpp"
#include "io.hpp"
#include "cli.hpp"

#endif
