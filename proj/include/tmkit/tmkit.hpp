#pragma once

#include "tmkit/model.hpp"
#include "tmkit/parser.hpp"
#include "tmkit/validator.hpp"
#include "tmkit/dynamics.hpp"
#include "tmkit/simulator.hpp"
#include "tmkit/exporter.hpp"
