#pragma once

#include "dualiso/config.hpp"
#include "dualiso/demosaic.hpp"
#include "dualiso/errors.hpp"
#include "dualiso/exposure.hpp"
#include "dualiso/fusion.hpp"
#include "dualiso/image.hpp"
#include "dualiso/io.hpp"
#include "dualiso/luminance.hpp"
#include "dualiso/metrics.hpp"
#include "dualiso/pipeline.hpp"
#include "dualiso/segmentation.hpp"
#include "dualiso/sve_raw.hpp"
#include "dualiso/sve_sim.hpp"
#include "dualiso/synthetic.hpp"
