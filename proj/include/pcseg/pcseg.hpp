#pragma once

#include "pcseg/core.hpp"
#include "pcseg/io.hpp"
#include "pcseg/gfl.hpp"
#include "pcseg/lowrank.hpp"
#include "pcseg/optics.hpp"
#include "pcseg/segment.hpp"
#include "pcseg/eval.hpp"
#include "pcseg/synth.hpp"
#include "pcseg/config.hpp"
#include "pcseg/pipeline.hpp"
