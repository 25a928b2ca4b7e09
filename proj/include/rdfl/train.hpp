#pragma once

#include "rdfl/train/adversary.hpp"
#include "rdfl/train/dataset_io.hpp"
#include "rdfl/train/least_squares.hpp"
#include "rdfl/train/metrics.hpp"
#include "rdfl/train/partition.hpp"
#include "rdfl/train/toy_gan.hpp"
#include "rdfl/train/trainer.hpp"
