#pragma once

// Everything: tensor core, codecs, masked diffuser, masks, tasks, runner.

#include "vqcd/error.hpp"
#include "vqcd/tensor.hpp"
#include "vqcd/param_store.hpp"
#include "vqcd/graph.hpp"
#include "vqcd/adam.hpp"
#include "vqcd/checkpoint.hpp"
#include "vqcd/layers.hpp"
#include "vqcd/vq.hpp"
#include "vqcd/align.hpp"
#include "vqcd/schedule.hpp"
#include "vqcd/unet.hpp"
#include "vqcd/diffuser.hpp"
#include "vqcd/agent.hpp"
#include "vqcd/mask.hpp"
#include "vqcd/tasks.hpp"
#include "vqcd/dataset.hpp"
#include "vqcd/metrics.hpp"
#include "vqcd/config.hpp"
#include "vqcd/report.hpp"
#include "vqcd/pipeline.hpp"
