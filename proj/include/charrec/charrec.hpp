#pragma once

#include <charrec/config.hpp>
#include <charrec/error.hpp>
#include <charrec/hog.hpp>
#include <charrec/image.hpp>
#include <charrec/imageio.hpp>
#include <charrec/manifest.hpp>
#include <charrec/matrix_ops.hpp>
#include <charrec/parallel.hpp>
#include <charrec/pipeline.hpp>
#include <charrec/rpca.hpp>
#include <charrec/serialize.hpp>
#include <charrec/src.hpp>
#include <charrec/synth.hpp>
