"""Loss-event extraction and q-exponential interoccurrence analysis."""
