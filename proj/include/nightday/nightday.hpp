#pragma once

#include "nightday/core/box.hpp"
#include "nightday/core/digest.hpp"
#include "nightday/core/error.hpp"
#include "nightday/core/random.hpp"
#include "nightday/core/tensor.hpp"
#include "nightday/data/datasets.hpp"
#include "nightday/data/image.hpp"
#include "nightday/data/preprocess.hpp"
#include "nightday/detector/anchors.hpp"
#include "nightday/detector/boxes.hpp"
#include "nightday/detector/checkpoint.hpp"
#include "nightday/detector/matching.hpp"
#include "nightday/detector/model.hpp"
#include "nightday/detector/multibox_loss.hpp"
#include "nightday/detector/nms.hpp"
#include "nightday/detector/trainer.hpp"
#include "nightday/metrics/average_precision.hpp"
#include "nightday/metrics/fps.hpp"
#include "nightday/metrics/report.hpp"
#include "nightday/metrics/ssim.hpp"
#include "nightday/pipeline/cli.hpp"
#include "nightday/pipeline/config.hpp"
#include "nightday/pipeline/inference.hpp"
#include "nightday/pipeline/render.hpp"
#include "nightday/pipeline/toy_data.hpp"
#include "nightday/pipeline/training.hpp"
#include "nightday/translation/checkpoint.hpp"
#include "nightday/translation/losses.hpp"
#include "nightday/translation/networks.hpp"
#include "nightday/translation/trainer.hpp"
