/** Job polling: the service queues long operations and we wait them out. */
import { ApiClient, JobRecord } from "./api.js";

export class JobFailed extends Error {
  readonly job: JobRecord;

  constructor(job: JobRecord) {
    super(job.diagnostics ?? `job ${job.id} failed`);
    this.job = job;
  }
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Poll until the job is done; throws JobFailed on failure and Error on
 * timeout. Jobs are minutes-scale at worst, so 1 s polling is plenty.
 */
export async function pollJob(
  client: ApiClient,
  jobId: string,
  opts: { intervalMs?: number; timeoutMs?: number } = {},
): Promise<JobRecord> {
  const interval = opts.intervalMs ?? 1000;
  const deadline = Date.now() + (opts.timeoutMs ?? 10 * 60 * 1000);
  for (;;) {
    const job = await client.getJob(jobId);
    if (job.status === "done") return job;
    if (job.status === "failed") throw new JobFailed(job);
    if (Date.now() > deadline) throw new Error(`job ${jobId} still ${job.status} at timeout`);
    await sleep(interval);
  }
}

/** Submit-and-wait helper; returns the job result object. */
export async function runJob(
  client: ApiClient,
  submit: () => Promise<string>,
  opts?: { intervalMs?: number; timeoutMs?: number },
): Promise<Record<string, unknown>> {
  const job = await pollJob(client, await submit(), opts);
  return job.result ?? {};
}
