#ifndef DROD_STEP_CONFIG_HPP
#define DROD_STEP_CONFIG_HPP

namespace drod {

// Integration and projection knobs. The default projection threshold follows
// the published value; note it is large next to typical ~0.1 m segments, so
// nominal steps satisfy it without corrections. 0.005 * rest segment length
// is a better choice when actual enforcement is wanted.
struct StepConfig {
    double dt = 0.01;                  // seconds
    double projection_epsilon = 0.05;  // meters
    int max_projection_iters = 10;
    bool residual_enabled = false;
};

} // namespace drod

#endif
