#pragma once

#include "umprobe/entropy.hpp"
#include "umprobe/error.hpp"
#include "umprobe/ingest.hpp"
#include "umprobe/io.hpp"
#include "umprobe/kernel.hpp"
#include "umprobe/pipeline.hpp"
#include "umprobe/report.hpp"
#include "umprobe/results.hpp"
#include "umprobe/rng.hpp"
#include "umprobe/synth.hpp"
#include "umprobe/types.hpp"
