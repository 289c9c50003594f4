#pragma once

#define MODAL_VERSION_MAJOR 0
#define MODAL_VERSION_MINOR 1
#define MODAL_VERSION_PATCH 0
#define MODAL_VERSION_STRING "0.1.0"
