#pragma once

#include "lookdev/commands.hpp"
#include "lookdev/diagnostics.hpp"
#include "lookdev/error.hpp"
#include "lookdev/feature_net.hpp"
#include "lookdev/finisher.hpp"
#include "lookdev/image.hpp"
#include "lookdev/image_io.hpp"
#include "lookdev/look_controls.hpp"
#include "lookdev/manifest.hpp"
#include "lookdev/style_opt.hpp"
#include "lookdev/worker_pool.hpp"
