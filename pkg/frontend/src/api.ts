// Typed client for the screening service. Talks only to /api/v1/*.

export interface PredictResponse {
  probabilities: Record<string, number>;
  suspected_mpox: boolean;
  mpox_probability: number;
  advice: string;
  heatmap: string | null;
  model_id: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** The consent flag is sent exactly as displayed, never defaulted to true. */
export function buildPredictForm(image: File, consentToStore: boolean, wantHeatmap: boolean): FormData {
  const form = new FormData();
  form.append('image', image, image.name);
  form.append('consent_to_store', consentToStore ? 'true' : 'false');
  form.append('want_heatmap', wantHeatmap ? 'true' : 'false');
  return form;
}

export async function postPredict(
  image: File,
  consentToStore: boolean,
  wantHeatmap: boolean,
  fetchImpl: typeof fetch = fetch,
): Promise<PredictResponse> {
  let response: Response;
  try {
    response = await fetchImpl('/api/v1/predict', {
      method: 'POST',
      body: buildPredictForm(image, consentToStore, wantHeatmap),
    });
  } catch {
    throw new ApiError(0, 'The screening service is unreachable. Is the backend running?');
  }
  if (!response.ok) {
    let detail = `request failed with status ${response.status}`;
    try {
      const body = (await response.json()) as { error?: string; detail?: string };
      if (body.error) detail = body.detail ? `${body.error}: ${body.detail}` : body.error;
    } catch {
      // non-JSON error body; keep the status message
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as PredictResponse;
}
