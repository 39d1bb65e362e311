// Copyright 2026 The xlom Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "xlom/analytics.hpp"
#include "xlom/clustering.hpp"
#include "xlom/corpus.hpp"
#include "xlom/embeddings.hpp"
#include "xlom/error.hpp"
#include "xlom/fixture.hpp"
#include "xlom/hash.hpp"
#include "xlom/http_provider.hpp"
#include "xlom/pipeline.hpp"
#include "xlom/rng.hpp"
#include "xlom/sentiment.hpp"
#include "xlom/stopwords.hpp"
#include "xlom/topics.hpp"
#include "xlom/unicode.hpp"
