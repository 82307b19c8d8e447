/* Compiled as C to keep the public header C-clean. */
#include "dls/dls.h"

int dls_header_is_c(void) {
  dls_run_plan plan;
  dls_run_plan_init(&plan);
  return plan.ranks == 1 && dls_status_name(DLS_OK)[0] == 'o';
}
