/* Copyright 2026 The ComFeAT Authors
 * 
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 * 
 *      http://www.apache.org/licenses/LICENSE-2.0
 * 
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Compiled as C: the public header must be usable from plain C. */

#include <stdio.h>
#include <string.h>

#include "comfeat/comfeat.h"

int main(void) {
  comfeat_model* model = NULL;
  comfeat_status st = comfeat_model_load("/nonexistent/model.cfwt", &model);
  if (st != COMFEAT_ERR_MISSING_ARTIFACT || model != NULL) {
    fprintf(stderr, "unexpected status %d\n", (int)st);
    return 1;
  }
  if (strlen(comfeat_last_error()) == 0 || strcmp(comfeat_version(), "") == 0) return 1;
  printf("%s %s\n", comfeat_version(), comfeat_status_name(st));
  return 0;
}
