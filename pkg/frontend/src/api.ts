// Session control actions: plain HTTP JSON requests to the service.

export interface ActionResult {
  ok: boolean;
  value?: unknown;
  error?: string;
}

export async function postAction(
  controlBase: string,
  path: "/session/reference" | "/session/recording" | "/session/tempo",
  value: unknown,
): Promise<ActionResult> {
  try {
    const response = await fetch(controlBase + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ value }),
    });
    const body = (await response.json()) as ActionResult;
    return body;
  } catch (err) {
    return { ok: false, error: String(err) };
  }
}
