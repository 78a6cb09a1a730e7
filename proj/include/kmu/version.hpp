#pragma once

#define KMU_VERSION "0.1.0"
