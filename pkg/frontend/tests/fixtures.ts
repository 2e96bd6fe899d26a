/** Captured server artifacts for the chat round-trip test: a real
 * planning-loop trace export and its final answer. */

export const SCRIPTED_ANSWER: string = "The interval shows background activity without abnormal findings.";

export const SCRIPTED_TRACE_BODY: string = "{\"action\": {\"action\": \"tool_call\", \"arguments\": {\"t_end_s\": 360, \"t_start_s\": 300}, \"tool\": \"slowSeizBckg\"}, \"index\": 0, \"observation\": {\"arguments\": {\"t_end_s\": 360, \"t_start_s\": 300}, \"ok\": true, \"payload\": {\"window\": [300.0, 360.0], \"windows\": [{\"probabilities\": {\"bckg\": 0.9506128794230845, \"seiz\": 0.02188317679481252, \"slow\": 0.027503943782103003}, \"t_end_s\": 310.0, \"t_start_s\": 300.0}, {\"probabilities\": {\"bckg\": 0.9480799314984214, \"seiz\": 0.022573998342072427, \"slow\": 0.0293460701595061}, \"t_end_s\": 320.0, \"t_start_s\": 310.0}, {\"probabilities\": {\"bckg\": 0.9470681796990128, \"seiz\": 0.02284494823915441, \"slow\": 0.03008687206183291}, \"t_end_s\": 330.0, \"t_start_s\": 320.0}, {\"probabilities\": {\"bckg\": 0.9503916101449386, \"seiz\": 0.02194425638603581, \"slow\": 0.02766413346902569}, \"t_end_s\": 340.0, \"t_start_s\": 330.0}, {\"probabilities\": {\"bckg\": 0.9432514202263221, \"seiz\": 0.023842945388946327, \"slow\": 0.032905634384731666}, \"t_end_s\": 350.0, \"t_start_s\": 340.0}, {\"probabilities\": {\"bckg\": 0.9493345005692613, \"seiz\": 0.022234108541466104, \"slow\": 0.028431390889272507}, \"t_end_s\": 360.0, \"t_start_s\": 350.0}]}, \"tool\": \"slowSeizBckg\"}, \"thought\": \"screen the minute\"}\n{\"action\": {\"action\": \"tool_call\", \"arguments\": {\"t_end_s\": 360, \"t_start_s\": 300}, \"tool\": \"compute_amplitude\"}, \"index\": 1, \"observation\": {\"arguments\": {\"t_end_s\": 360, \"t_start_s\": 300}, \"ok\": true, \"payload\": {\"per_channel\": {\"F3-C3\": {\"max_uv\": 17.800000000000182, \"mean_abs_uv\": 3.9201999999999977, \"min_uv\": -17.300000000000182, \"rms_uv\": 4.9225203571612255}, \"F4-C4\": {\"max_uv\": 18.40000000000009, \"mean_abs_uv\": 3.947299999999998, \"min_uv\": -19.90000000000009, \"rms_uv\": 4.975021272986345}, \"FP1-F3\": {\"max_uv\": 17.59999999999991, \"mean_abs_uv\": 3.9993833333333324, \"min_uv\": -18.699999999999818, \"rms_uv\": 5.023736159473344}, \"FP2-F4\": {\"max_uv\": 18.09999999999991, \"mean_abs_uv\": 3.977533333333332, \"min_uv\": -17.699999999999818, \"rms_uv\": 4.969610984104624}}, \"window\": [300.0, 360.0]}, \"tool\": \"compute_amplitude\"}, \"thought\": \"characterize amplitude\"}\n{\"action\": {\"action\": \"final_answer\", \"answer\": \"The interval shows background activity without abnormal findings.\"}, \"index\": 2, \"observation\": null, \"thought\": \"\"}\n{\"summary\": {\"backend_calls\": 3, \"budget_exhausted\": false, \"steps_used\": 3, \"tool_seconds_analyzed\": 120.0}}\n";
